import json
import logging

from src.core.hamiltonian_io import read_hamiltonian
from src.counting.cluster_expansion import log_partition_report
from src.oracle.exact_oracle import log_partition_exact
from src.utils.load_config import get_settings

logger = logging.getLogger(__name__)


def cmd_logz(args, config: dict) -> int:
    """Estimate log tr e^{-beta H} for a Hamiltonian file."""
    settings = get_settings(config)
    cluster = settings.cluster
    h = read_hamiltonian(args.hamiltonian)
    report = log_partition_report(
        h,
        args.beta,
        args.eta,
        w_max=cluster.w_max,
        max_clusters=cluster.max_clusters,
        unsafe_beta=args.unsafe_beta,
        ursell_max_vertices=cluster.ursell_max_vertices,
    )
    record = report.to_record()
    record["truncation_bound"] = report.truncation_bound
    record["capped"] = report.capped
    if h.n <= settings.oracle.max_sites:
        exact = log_partition_exact(h, args.beta)
        record["exact"] = exact
        record["error"] = report.z_hat - exact

    print(json.dumps(record, indent=2))
    logger.info("log Z: k=%d clusters=%d in %.2fs", report.k_used, report.cluster_count, report.elapsed)
    return 0
