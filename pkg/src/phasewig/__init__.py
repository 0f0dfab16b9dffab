"""Phase-space quantum mechanics at desk scale: Wigner transforms by three routes,
symplectic connections from generating functions, and covariant phase-space
Schrodinger operators."""

from importlib import metadata

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
