"""Point-to-multipoint transfer scheduling and simulation on 2D-mesh NoCs."""

from .errors import (
    CapacityError,
    ChaincastError,
    CodecError,
    ConfigError,
    FramingError,
    InvalidNodeError,
    ProtocolError,
)
from .topology import (
    Coord,
    DirectedLink,
    MeshTopology,
    RoutePath,
    coord_to_node,
    manhattan_distance,
    node_distance,
    node_to_coord,
    xy_route,
)
from .scheduling import (
    EXACT_TSP_MAX,
    ChainOrder,
    DestinationSet,
    GreedySchedule,
    GreedyStep,
    chain_hops,
    distance_matrix,
    greedy_order,
    greedy_schedule,
    naive_order,
    nearest_neighbor_order,
    tsp_order,
)
from .multicast import (
    HopMechanism,
    HopReport,
    MulticastTree,
    hop_report,
    multicast_tree,
    unicast_hops,
)
from .protocol import (
    AccessPattern,
    CfgPacket,
    ChainNodeConfig,
    Frame,
    Role,
    TypeId,
    build_chain_configs,
    decode_cfg,
    describe_packet,
    encode_cfg,
    gen_affine_addresses,
    validate_chain,
)
from .simulator import (
    Endpoint,
    EndpointState,
    Event,
    EventKind,
    LatencyReport,
    Mechanism,
    Mode,
    PhaseCycles,
    SimParams,
    TransferTask,
    run_chainwrite,
    run_chainwrite_detailed,
    run_multicast,
    run_transfer,
    run_unicast,
    step_endpoint,
)
from .metrics import (
    DEFAULT_IDEAL_BANDWIDTH,
    EfficiencyPoint,
    RegressionFit,
    eta_p2mp,
    fit_linear,
)
from .experiments import (
    EFFICIENCY_PARAMS,
    ExperimentConfig,
    default_config,
    default_efficiency_config,
    default_hops_config,
    default_overhead_config,
    load_config,
    parse_config,
    run_efficiency_experiment,
    run_experiment,
    run_hops_experiment,
    run_overhead_experiment,
    sample_destinations,
    serpentine_nodes,
)

__version__ = "0.1.0"
