"""CRUD operations for experiment records."""

from typing import Optional, List, Dict
from sqlalchemy.orm import Session
from sqlalchemy import desc

from src.circuit.program import dumps_canonical
from src.database.models import Experiment, MethodResult


def save_report(session: Session, report, notes: Optional[str] = None) -> Experiment:
    """Persist an ExperimentReport with one MethodResult per method variant.

    Args:
        session: Active database session
        report: ExperimentReport from run_experiment
        notes: Optional free-form notes

    Returns:
        Created Experiment with assigned experiment_id

    Example:
        >>> from src.database.session import get_session
        >>> with get_session() as session:
        ...     experiment = save_report(session, run_experiment(settings))
        ...     print(f"Recorded experiment {experiment.experiment_id}")
    """
    data = report.to_dict()
    gen = report.settings.gen

    experiment = Experiment(
        n_qubits=gen.n_qubits,
        n_segments=gen.n_segments,
        n_gates=gen.n_gates,
        seed=gen.seed,
        corpus_size=len(report.cases),
        attempts=report.attempts,
        backend=report.settings.backend,
        n_bugs=report.settings.n_bugs,
        config_json=dumps_canonical(report.settings.to_dict()),
        notes=notes,
    )
    for method, metrics in data['methods'].items():
        experiment.results.append(MethodResult(
            method=method,
            runs=metrics['runs'],
            failures=metrics['failures'],
            success_probability=metrics['success_probability'],
            avg_cost_success=metrics['avg_cost_success'],
            avg_cost_all=metrics['avg_cost_all'],
        ))

    session.add(experiment)
    session.flush()  # Get experiment_id without committing
    return experiment


def get_experiment(session: Session, experiment_id: int) -> Optional[Experiment]:
    """Retrieve one experiment by ID (None if not found)."""
    return session.query(Experiment).filter(Experiment.experiment_id == experiment_id).first()


def list_experiments(
    session: Session,
    n_qubits: Optional[int] = None,
    n_segments: Optional[int] = None,
    n_gates: Optional[int] = None,
    backend: Optional[str] = None,
    limit: Optional[int] = None,
    offset: Optional[int] = 0
) -> List[Experiment]:
    """Retrieve experiments with optional filtering, newest first.

    Args:
        session: Active database session
        n_qubits: Filter by qubit count
        n_segments: Filter by segment count
        n_gates: Filter by gate count
        backend: Filter by backend ('simulator' or 'perfect')
        limit: Maximum number of results
        offset: Number of results to skip (for pagination)

    Returns:
        List of Experiment objects matching filters

    Example:
        >>> experiments = list_experiments(session, n_qubits=2, n_segments=10)
        >>> print(f"Found {len(experiments)} 2-qubit, 10-segment experiments")
    """
    query = session.query(Experiment)

    # Apply filters
    if n_qubits is not None:
        query = query.filter(Experiment.n_qubits == n_qubits)
    if n_segments is not None:
        query = query.filter(Experiment.n_segments == n_segments)
    if n_gates is not None:
        query = query.filter(Experiment.n_gates == n_gates)
    if backend:
        query = query.filter(Experiment.backend == backend)

    query = query.order_by(desc(Experiment.experiment_id))

    # Pagination
    if offset:
        query = query.offset(offset)
    if limit:
        query = query.limit(limit)

    return query.all()


def delete_experiment(session: Session, experiment_id: int) -> bool:
    """Delete an experiment and cascade to its method results.

    Returns:
        True if deleted, False if not found
    """
    experiment = get_experiment(session, experiment_id)
    if not experiment:
        return False

    session.delete(experiment)
    session.flush()
    return True


def method_history(session: Session, method: str, **filters) -> List[Dict[str, float]]:
    """Metrics of one method across stored experiments, oldest first.

    Args:
        session: Active database session
        method: Method variant name
        **filters: Same filters as list_experiments

    Example:
        >>> for row in method_history(session, 'proposed', n_segments=10):
        ...     print(row['experiment_id'], row['avg_cost_all'])
    """
    ids = [e.experiment_id for e in list_experiments(session, **filters)]
    if not ids:
        return []
    results = (
        session.query(MethodResult)
        .filter(MethodResult.method == method, MethodResult.experiment_id.in_(ids))
        .order_by(MethodResult.experiment_id)
        .all()
    )
    return [r.to_dict() for r in results]
