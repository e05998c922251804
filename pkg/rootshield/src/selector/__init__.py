from .Deployment import DeploymentState, COMBOS, SINGLES, STRICT_SINGLES, is_valid_pipeline, validate_pipeline, \
    single_allowed
from .FilterSelector import FilterSelector, SelectorAction, TickOutcome, Reevaluation, EFFECTIVE_FRACTION, \
    candidates, deploy_single, deploy_combo, evaluate_combos, reevaluate
