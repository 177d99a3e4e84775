"""Factorized third-order block expectations per covariance component.

Component i of the moment derivative (indices 4..13, covariance
block) differs from the exact derivative by
    Re[ U * sum_t coeff_t * (<B1 B2 B3>_exact - <B1 B2 B3>_factorized) ]
with B_jk = a_j^dag a_k, ordered pair/triple expectations, and the
factorization
    <B1 B2 B3> ~= <B1 B2><B3> + <B1 B3><B2> + <B2 B3><B1>
                  - 2<B1><B2><B3>.
Exact accounting of this difference is used by the tests.

Generated by tools/derive_moment_rhs.py; do not edit by hand.
"""

CLOSURE_TRIPLES = {
    4: [(1j, ((1, 1), (1, 2), (1, 2))), (1j, ((2, 1), (2, 1), (2, 2))), (-1j, ((1, 2), (1, 2), (2, 2))), (-1j, ((1, 1), (2, 1), (2, 1)))],
    5: [((-1+0j), ((1, 1), (1, 2), (1, 2))), ((1+0j), ((2, 1), (2, 1), (2, 2))), ((1+0j), ((1, 2), (1, 2), (2, 2))), ((-1+0j), ((1, 1), (2, 1), (2, 1)))],
    6: [(1j, ((1, 1), (1, 2), (2, 2))), (-0.5j, ((1, 1), (1, 1), (1, 2))), (0.5j, ((1, 1), (1, 1), (2, 1))), (-0.5j, ((1, 2), (2, 2), (2, 2))), (0.5j, ((2, 1), (2, 2), (2, 2))), (-1j, ((1, 1), (2, 1), (2, 2)))],
    7: [(1j, ((1, 1), (1, 1), (1, 2))), (-1j, ((1, 1), (1, 1), (2, 1))), (-1j, ((1, 2), (2, 2), (2, 2))), (1j, ((2, 1), (2, 2), (2, 2)))],
    8: [(-1j, ((1, 1), (1, 2), (1, 2))), (-1j, ((2, 1), (2, 1), (2, 2))), (1j, ((1, 2), (1, 2), (2, 2))), (1j, ((1, 1), (2, 1), (2, 1)))],
    9: [((-1+0j), ((1, 1), (1, 2), (2, 2))), ((0.5+0j), ((1, 1), (1, 1), (1, 2))), ((0.5+0j), ((1, 1), (1, 1), (2, 1))), ((0.5+0j), ((1, 2), (2, 2), (2, 2))), ((0.5+0j), ((2, 1), (2, 2), (2, 2))), ((-1+0j), ((1, 1), (2, 1), (2, 2)))],
    10: [((-1+0j), ((1, 1), (1, 1), (1, 2))), ((-1+0j), ((1, 1), (1, 1), (2, 1))), ((1+0j), ((1, 2), (2, 2), (2, 2))), ((1+0j), ((2, 1), (2, 2), (2, 2)))],
    11: [],
    12: [],
    13: [],
}
