from dollyin._core import *  # noqa: F401,F403
from dollyin._core import __version__  # noqa: F401
