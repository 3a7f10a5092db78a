"""
T-KRR - Tensor-Kernel Ridge Regression
Entry point for the command line
"""

import os
import sys
import logging
from dotenv import load_dotenv

from src.cli import run


def setup_logging():
    """Configure logging for the application"""
    log_level = os.getenv('LOG_LEVEL', 'INFO').upper()
    log_file = os.getenv('LOG_FILE')

    # Standard output carries result tables; diagnostics go to stderr
    logging.basicConfig(
        level=getattr(logging, log_level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stderr),
            logging.FileHandler(log_file) if log_file else logging.NullHandler()
        ]
    )

    # Reduce noise from third-party libraries
    logging.getLogger('numexpr').setLevel(logging.WARNING)


def main():
    """Main entry point"""
    load_dotenv()
    setup_logging()
    logger = logging.getLogger(__name__)

    try:
        code = run(sys.argv[1:])
    except KeyboardInterrupt:
        logger.info("Interrupted")
        code = 130

    sys.exit(code)


if __name__ == "__main__":
    main()
