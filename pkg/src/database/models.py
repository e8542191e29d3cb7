"""SQLAlchemy ORM models for experiment records."""

from sqlalchemy import (
    Column, Integer, Float, String, Text,
    ForeignKey, CheckConstraint, Index
)
from sqlalchemy.orm import declarative_base, relationship
from datetime import datetime
from typing import Dict, Any

Base = declarative_base()


class Experiment(Base):
    """One call of run_experiment.

    Each experiment has one MethodResult per method variant.

    Attributes:
        experiment_id: Auto-incrementing primary key
        n_qubits: Qubits per generated program
        n_segments: Segments per generated program
        n_gates: Gates per generated program
        seed: Corpus seed
        corpus_size: Kept program/bug pairs
        attempts: Programs generated to fill the corpus
        backend: 'simulator' or 'perfect'
        n_bugs: Bugs per program
        config_json: Canonical JSON echo of the experiment settings
        notes: Free-form notes
        created_at: Record creation timestamp

    Example:
        >>> experiment = Experiment(
        ...     n_qubits=2, n_segments=10, n_gates=30, seed=1,
        ...     corpus_size=100, attempts=131, backend='simulator', n_bugs=1,
        ...     config_json='{...}'
        ... )
    """

    __tablename__ = 'experiments'

    # Primary Key
    experiment_id = Column(Integer, primary_key=True, autoincrement=True)

    # Corpus shape
    n_qubits = Column(Integer, nullable=False)
    n_segments = Column(Integer, nullable=False)
    n_gates = Column(Integer, nullable=False)
    seed = Column(Integer, nullable=False, index=True)
    corpus_size = Column(Integer, nullable=False)
    attempts = Column(Integer, nullable=False)

    # Modes
    backend = Column(String(20), nullable=False, default='simulator')
    n_bugs = Column(Integer, nullable=False, default=1)

    config_json = Column(Text, nullable=False)
    notes = Column(Text, nullable=True)

    # Metadata
    created_at = Column(String(30), default=lambda: datetime.utcnow().isoformat())

    # Relationships
    results = relationship(
        "MethodResult",
        back_populates="experiment",
        cascade="all, delete-orphan",
        lazy="select",
        order_by="MethodResult.result_id"
    )

    __table_args__ = (
        CheckConstraint("backend IN ('simulator', 'perfect')", name='valid_backend'),
        CheckConstraint('n_segments >= 2', name='min_segments'),
        CheckConstraint('corpus_size >= 1', name='positive_corpus_size'),
        Index('idx_experiment_shape', 'n_qubits', 'n_segments', 'n_gates'),
    )

    def __repr__(self) -> str:
        """String representation for debugging."""
        return (
            f"<Experiment(id={self.experiment_id}, shape={self.n_qubits}q/"
            f"{self.n_segments}s/{self.n_gates}g, seed={self.seed}, runs={self.corpus_size})>"
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization.

        Returns:
            Dictionary with all experiment fields and its method results
        """
        return {
            'experiment_id': self.experiment_id,
            'n_qubits': self.n_qubits,
            'n_segments': self.n_segments,
            'n_gates': self.n_gates,
            'seed': self.seed,
            'corpus_size': self.corpus_size,
            'attempts': self.attempts,
            'backend': self.backend,
            'n_bugs': self.n_bugs,
            'notes': self.notes,
            'created_at': self.created_at,
            'results': [r.to_dict() for r in self.results],
        }


class MethodResult(Base):
    """Aggregated metrics of one method variant within an experiment.

    Attributes:
        result_id: Auto-incrementing primary key
        experiment_id: Foreign key to Experiment
        method: Method variant name ('proposed', 'binary', 'proposed-no_early', ...)
        runs: Programs the method was applied to
        failures: Runs that did not locate the injected segment(s)
        success_probability: (runs - failures) / runs
        avg_cost_success: Mean gate cost over successful runs (NULL without successes)
        avg_cost_all: Mean gate cost over all runs
    """

    __tablename__ = 'method_results'

    # Primary Key
    result_id = Column(Integer, primary_key=True, autoincrement=True)

    # Foreign Key
    experiment_id = Column(Integer, ForeignKey('experiments.experiment_id', ondelete='CASCADE'),
                           nullable=False, index=True)

    method = Column(String(40), nullable=False, index=True)
    runs = Column(Integer, nullable=False)
    failures = Column(Integer, nullable=False, default=0)
    success_probability = Column(Float, nullable=False)
    avg_cost_success = Column(Float, nullable=True)
    avg_cost_all = Column(Float, nullable=False)

    # Relationships
    experiment = relationship("Experiment", back_populates="results")

    __table_args__ = (
        CheckConstraint('runs >= 1', name='positive_runs'),
        CheckConstraint('failures >= 0 AND failures <= runs', name='valid_failures'),
        CheckConstraint(
            'success_probability >= 0 AND success_probability <= 1',
            name='valid_success_probability'
        ),
        Index('idx_experiment_method', 'experiment_id', 'method', unique=True),
    )

    def __repr__(self) -> str:
        """String representation for debugging."""
        return (
            f"<MethodResult(experiment={self.experiment_id}, method={self.method}, "
            f"success={self.success_probability:.3f}, cost={self.avg_cost_all:.1f})>"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'result_id': self.result_id,
            'experiment_id': self.experiment_id,
            'method': self.method,
            'runs': self.runs,
            'failures': self.failures,
            'success_probability': self.success_probability,
            'avg_cost_success': self.avg_cost_success,
            'avg_cost_all': self.avg_cost_all,
        }
