"""Database session management for experiment records."""

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker, Session
from contextlib import contextmanager
from typing import Generator, Optional
from pathlib import Path

from src.utils.config import config

_engine: Optional[Engine] = None
_session_factory: Optional[sessionmaker] = None


def ensure_database_directory(db_url: str) -> None:
    """Ensure the directory of a SQLite database file exists."""
    if db_url.startswith('sqlite:///') and db_url != 'sqlite:///:memory:':
        db_file = Path(db_url.replace('sqlite:///', ''))
        db_file.parent.mkdir(parents=True, exist_ok=True)


def get_engine() -> Engine:
    """Get the SQLAlchemy engine, created from DATABASE_URL on first use.

    Experiments that are never recorded never touch the database file.
    """
    global _engine, _session_factory
    if _engine is None:
        db_url = config.database_url
        ensure_database_directory(db_url)
        _engine = create_engine(
            db_url,
            echo=config.debug,  # Log SQL queries in debug mode
            pool_pre_ping=True,
            connect_args={'check_same_thread': False} if 'sqlite' in db_url else {}
        )
        _session_factory = sessionmaker(
            bind=_engine,
            autoflush=False,
            autocommit=False,
            expire_on_commit=False  # Allow access to objects after commit
        )
    return _engine


@contextmanager
def get_session() -> Generator[Session, None, None]:
    """Provide a transactional scope for database operations.

    This context manager handles:
    - Session creation
    - Automatic commit on success
    - Automatic rollback on error
    - Session cleanup

    Usage:
        >>> from src.database.session import get_session
        >>> with get_session() as session:
        ...     experiment = session.query(Experiment).first()

    Yields:
        Active SQLAlchemy session
    """
    get_engine()
    session = _session_factory()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()
