"""Reference child-process denoiser for the UIS1 frame protocol."""

from .framing import MAGIC, MalformedFrame, read_frame, write_frame
from .modes import AdapterMode
from .server import serve

__version__ = "0.1.0"

__all__ = ["MAGIC", "MalformedFrame", "AdapterMode", "read_frame", "serve", "write_frame"]
