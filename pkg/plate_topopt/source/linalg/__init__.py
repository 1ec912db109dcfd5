from .sparse_solver import SparseLUSolver, get_solver, hash_csr_matrix, solve

__all__ = ["SparseLUSolver", "get_solver", "hash_csr_matrix", "solve"]
