"""Motion segmentation as binary-matrix synchronization, compiled to QUBO."""
