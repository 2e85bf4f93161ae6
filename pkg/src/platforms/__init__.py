from src.platforms.architecture import (
    ArchitectureGraph,
    Cluster,
    CommLink,
    ProcessingElement,
    comm_latency,
)
from src.platforms.loader import (
    builtin_platform,
    load_platform,
    load_platform_file,
    platform_to_document,
    resolve_platform,
    save_platform,
)
from src.platforms.profiles import (
    CLUSTER_KINDS,
    PLATFORM_CONFIGS,
    TASK_TYPES,
    generate_platform_document,
    generate_profile_table,
)
