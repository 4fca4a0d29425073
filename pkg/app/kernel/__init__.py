"""Convex kernels shared by device proxes."""
