"""Universal Slepian-Wolf coding with chained polar codes over GF(q)."""
from .galois import FieldSpec, gf
from .source import BroadcastChannel, JointSource, PairDistribution
from .transform import TransformSpec, forward, inverse, transform_spec

__all__ = ["FieldSpec", "gf", "BroadcastChannel", "JointSource", "PairDistribution",
           "TransformSpec", "forward", "inverse", "transform_spec"]
__version__ = "0.1.0"
