"""tenantweaver: multi-tenant SaaS customization engine.

Variability models describe the customizable surface; a metagraph
adjacency-matrix algorithm validates tenant customization sets; validated
selections are stored per tenant and woven into workflow processes as
aspects at request time.
"""

from .ovm import (
    Constraint,
    Diagnostic,
    InvalidModelError,
    ModelFormatError,
    VariabilityGroup,
    VariabilityModel,
    VariationPoint,
    Variant,
    check_model,
    parse_model,
    serialize_model,
)
from .metagraph import (
    AdjacencyMatrix,
    CardinalityMatrix,
    MetaEdge,
    Metagraph,
    Triple,
    adjacency,
    map_ovm,
    metagraph_export,
    reconstruct_edges,
    to_dot,
)
from .validation import (
    CustomizationInstance,
    CustomizationSet,
    ValidationReport,
    ValidationState,
    check_instance,
    apply_instance,
    finalize,
    initialize,
    report_from_dict,
    report_to_dict,
    validate,
    validate_incremental,
)
from .enumeration import EnumerationResult, SearchSpaceExceeded, enumerate_configurations
from .workflow import (
    Activity,
    AspectDefinition,
    ExecutionTrace,
    Pointcut,
    ProcessDefinition,
    ServiceStub,
    WovenProcess,
    execute,
    reweave_on_change,
    weave,
)
from .store import StoreCatalog
from .service import create_app

__all__ = [name for name in dir() if not name.startswith("_")]
