# latent_composite/db.py
from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional, Sequence

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker

from latent_composite.models import Base, ReplicateEstimate, SimulationRun
from latent_composite.simulation.runner import ReplicateResult


@lru_cache(maxsize=8)
def get_engine(url: str) -> Engine:
    return create_engine(url, pool_pre_ping=True)


def session_factory(url: str) -> sessionmaker:
    return sessionmaker(bind=get_engine(url), autoflush=False, autocommit=False)


def init_db(url: str) -> None:
    Base.metadata.create_all(bind=get_engine(url))


def _num(v: float) -> Optional[float]:
    return v if v is not None and math.isfinite(v) else None


def save_simulation(
    url: str,
    run_hash: str,
    scenario_name: str,
    scenario_hash: str,
    seed: int,
    true_log_or: float,
    summary: dict,
    replicates: Sequence[ReplicateResult],
) -> int:
    """Store one simulation run with every replicate estimate; returns the run id."""
    init_db(url)
    SessionLocal = session_factory(url)
    db = SessionLocal()
    try:
        run = SimulationRun(
            run_hash=run_hash,
            scenario_name=scenario_name,
            scenario_hash=scenario_hash,
            seed=seed,
            n_sim=len(replicates),
            true_log_or=_num(true_log_or),
            summary=summary,
        )
        for rep in replicates:
            for name, out in rep.outcomes.items():
                run.replicates.append(
                    ReplicateEstimate(
                        replicate=rep.index,
                        method=name,
                        estimate=_num(out.estimate),
                        se=_num(out.se),
                        ci_low=_num(out.ci_low),
                        ci_high=_num(out.ci_high),
                        p_value=_num(out.p_value),
                        p_treat=_num(out.p_treat),
                        p_control=_num(out.p_control),
                        converged=out.converged,
                        error=out.error,
                    )
                )
        db.add(run)
        db.commit()
        db.refresh(run)
        return run.id
    finally:
        db.close()
