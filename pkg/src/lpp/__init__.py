"""Dynamic last-passage percolation: weight laws, lattice, passage-time kernels and estimators."""
