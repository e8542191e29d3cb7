"""Database initialization and schema creation."""

import logging

from sqlalchemy import inspect

from src.database.models import Base
from src.database.session import get_engine

logger = logging.getLogger(__name__)


def init_database(drop_existing: bool = False) -> None:
    """Create the experiment tables if they don't exist.

    Args:
        drop_existing: If True, drop all tables first (DESTRUCTIVE)

    Example:
        >>> init_database()  # Create tables
        >>> init_database(drop_existing=True)  # Reset database
    """
    engine = get_engine()
    if drop_existing:
        logger.warning("Dropping all experiment tables")
        Base.metadata.drop_all(engine)

    Base.metadata.create_all(engine)
    tables = inspect(engine).get_table_names()
    logger.debug("Database ready with tables: %s", ', '.join(tables))


if __name__ == "__main__":
    import argparse

    from src.utils.logging_setup import configure_logging

    configure_logging()
    parser = argparse.ArgumentParser(description="Initialize the experiment database")
    parser.add_argument('--drop', action='store_true', help='Drop existing tables first (DESTRUCTIVE)')
    args = parser.parse_args()
    init_database(drop_existing=args.drop)
