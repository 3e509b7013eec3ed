"""Best separable approximation of bipartite density matrices.

Kronecker order is ``index = i_A * n + i_B`` throughout.
"""

from .bsa import *  # noqa: F401,F403
from .errors import (BsaError, Degenerate, InternalError, InvalidInput, NotPositive, NotPpt,  # noqa: F401
                     RangeViolation, WrongRank)
from .io import load_density, load_upb_fixture, save_density  # noqa: F401
from .measures import *  # noqa: F401,F403
from .ppt_bsa import *  # noqa: F401,F403
from .states import (BipartiteDims, DensityMatrix, ProductVector, bell_state, is_ppt,  # noqa: F401
                     local_unitary, partial_transpose, random_density, random_product_vector,
                     schmidt_coefficients, werner)
from .twoqubit import *  # noqa: F401,F403

__version__ = "0.1.0"
