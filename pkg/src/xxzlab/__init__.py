"""Hard-core XXZ chain laboratory: sector Hamiltonians, Combes-Thomas and
projection-decay checks, bipartite entanglement bounds and Ising-limit
combinatorics."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"
