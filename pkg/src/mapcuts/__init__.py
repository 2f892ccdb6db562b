"""Cut vertices and blocks in random planar maps: exact series and sampling."""

__version__ = "0.1.0"
