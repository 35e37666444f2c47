"""Recurrence, averaging and sum-product experiments under the affine group of a finite field."""

__version__ = "0.1.0"

from .colouring import (
    Colouring,
    conjecture_norm_scan,
    gs_lower_term,
    gs_quadruple_search,
    monochromatic_triple_search,
    product_recurrence_measure,
    product_triple_measure,
    select_r_prime,
)
from .field import Field, Poly, build_field, eval_poly, is_admissible, parse_field, parse_poly
from .functions import (
    FieldSubset,
    GridFn,
    ProductSet,
    inner,
    koopman_add,
    koopman_affine,
    koopman_mul,
    measure,
    norm2sq,
    proj_additive,
    proj_multiplicative,
)
from .literals import generate_colouring, generate_set
from .patterns import (
    count_product_sum_pairs,
    count_quadruples,
    count_shkredov_triples,
    pairs_threshold,
    shkredov_return_set,
    shkredov_threshold,
)
