"""qcodesign: co-design benchmarking for qubit topologies and gate bases."""

__version__ = "0.1.0"
