"""Time-varying disassortative communication networks.

Growth models under correlation-conditioned preferential attachment,
structural and congestion metrics, betweenness-correlation route selection,
and Kelly-style rate control.
"""

from .graph import (
    EdgeEvent,
    EventLog,
    GraphSnapshot,
    apply_event,
    connected_after_removal,
    load_event_log,
    replay,
    save_event_log,
)
from .generator import (
    BA,
    DTVCN,
    TVCN,
    GrowthParams,
    TheoryConstants,
    attach_probability,
    antipref_probability,
    degree_trajectory,
    grow,
    theory_constants,
)
from .correlation import (
    ExcessDegreeDistribution,
    NodeScores,
    andn,
    excess_distribution,
    node_scores,
    node_zeta,
    pairwise_contribution,
    pearson_r,
)
from .metrics import (
    MetricsReport,
    bc_degree_exponent,
    betweenness,
    build_report,
    clustering_coefficient,
    distances,
    fit_power_law,
    rich_club,
)
from .traffic import (
    CapacityModel,
    TrafficRun,
    capacities,
    estimate_lambda_c,
    lambda_c_theoretical,
    order_parameter,
    simulate,
)
from .flowcontrol import (
    LinkPriceModel,
    UserSession,
    enumerate_shortest_paths,
    evolve_rates,
    link_price,
    path_score,
    select_paths,
    system_oracle,
)

__version__ = "0.1.0"
