import json
import logging

from src.verification.suites import SUITES

logger = logging.getLogger(__name__)


def cmd_verify(args, config: dict) -> int:
    """Run one verification suite, or all of them.

    Prints one JSON report per suite. Exit code 0 iff every check passed.
    """
    names = list(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        logger.info("running suite %s (%s)", name, "full" if args.full else "quick")
        report = SUITES[name](full=args.full, seed=args.seed)
        print(json.dumps(report.to_record(), indent=2))
        if not report.passed:
            ok = False
            for failure in report.failures[:20]:
                logger.warning("%s: %s", name, failure)
    return 0 if ok else 1
