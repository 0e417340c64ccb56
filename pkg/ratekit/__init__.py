__version__ = '0.1.0'

from ratekit.distmodel import DistributionSpec, load_fixture
from ratekit.conjugate import RateOptions, rate_eval
from ratekit.criteria import strict_convexity_verdict, domain_decomposition
