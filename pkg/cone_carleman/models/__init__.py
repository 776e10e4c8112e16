"""cone_carleman data models."""

from .certificate import (
    A3ScanReport,
    AlphaCurvePoint,
    GCheckReport,
    HessianScanReport,
    LambdaScanReport,
    MonotonicityReport,
    ScanReport,
)
from .cone import ConeSpec, SamplingRegion, SpaceTimePoint
from .counterexample import (
    CounterexampleParams,
    ResidualReport,
    SectorBoundReport,
    VanishingReport,
)
from .grid import (
    ControlReport,
    CrosscheckReport,
    DecayFit,
    GridField,
    RadialGeometry,
    SectorGeometry,
)
from .quadrature import (
    ASweepReport,
    BumpSpec,
    CarlemanCheckReport,
    EnergyIdentityReport,
    Modulation,
    QuadratureResult,
)
from .weight import Jet, WeightEval, WeightParams

__all__ = [
    "A3ScanReport",
    "AlphaCurvePoint",
    "GCheckReport",
    "HessianScanReport",
    "LambdaScanReport",
    "MonotonicityReport",
    "ScanReport",
    "ConeSpec",
    "SamplingRegion",
    "SpaceTimePoint",
    "CounterexampleParams",
    "ResidualReport",
    "SectorBoundReport",
    "VanishingReport",
    "ControlReport",
    "CrosscheckReport",
    "DecayFit",
    "GridField",
    "RadialGeometry",
    "SectorGeometry",
    "ASweepReport",
    "BumpSpec",
    "CarlemanCheckReport",
    "EnergyIdentityReport",
    "Modulation",
    "QuadratureResult",
    "Jet",
    "WeightEval",
    "WeightParams",
]
