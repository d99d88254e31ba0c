"""floatwatch: motion-based floating-object detection for water-surface video.

The hot kernels (differencing, labelling, co-occurrence counting, block
matching, scene noise) run under numba when it is installed; set
``FLOATWATCH_ACCEL=numpy`` to force the pure-numpy path.
"""

from ._accel import BACKEND
from .errors import FloatwatchError
from .imaging import BoundingBox, Frame

__version__ = "0.1.0"

__all__ = ["BACKEND", "BoundingBox", "FloatwatchError", "Frame", "__version__"]
