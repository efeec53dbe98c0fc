"""Random walks on free groups and the hyperbolic plane, and a Gromov-product
certificate for random subgroups being free and undistorted."""
from .certifier import Certificate, FailureReport, criterion_check, verify_certificate_bruteforce
from .errors import HypwalkError, NumericError, UsageError
from .geometry import estimate_delta, gromov_product
from .model_spaces import FreeWord, Moebius, PlanePoint, PlaneSpace, TreeSpace
from .random_walk import make_measure, sample_generator_tuple, uniform_symmetric

__version__ = "0.1.0"
