"""Block-partitioned hybrid solver for sparse Hermitian positive-definite systems."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .matrix import (  # noqa: E402
    GeneratorSpec,
    SparseMatrix,
    condition_number,
    generate_block_diagonal,
    generate_rhs,
    generate_spd,
    matvec,
    residual,
)
from .mmio import load_matrix_market, load_vector, save_matrix_market, save_vector  # noqa: E402
from .partition import BlockSystem, aggregate, partition  # noqa: E402
from .precondition import (  # noqa: E402
    PreconditionedBlock,
    Preconditioner,
    Strategy,
    apply_symmetric,
    build_jacobi,
    precondition_all,
    unscale_solution,
)
from .classical import conjugate_gradient, direct_solve  # noqa: E402
from .hhl import HHLConfig, HHLResult, choose_config, hhl_refine, hhl_solve  # noqa: E402
