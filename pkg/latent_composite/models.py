# latent_composite/models.py
from typing import Optional

from sqlalchemy import JSON, DateTime, Float, ForeignKey, Integer, String, Text, func
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase):
    pass


class SimulationRun(Base):
    __tablename__ = "simulation_runs"
    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    run_hash: Mapped[str] = mapped_column(String(64), index=True)
    scenario_name: Mapped[str] = mapped_column(String(64))
    scenario_hash: Mapped[str] = mapped_column(String(32))
    seed: Mapped[int] = mapped_column(Integer)
    n_sim: Mapped[int] = mapped_column(Integer)
    true_log_or: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    # OperatingCharacteristics.model_dump()
    summary: Mapped[dict] = mapped_column(JSON, default=dict)
    created_at: Mapped[str] = mapped_column(DateTime(timezone=True), server_default=func.now())

    replicates = relationship("ReplicateEstimate", back_populates="run", cascade="all, delete-orphan")


class ReplicateEstimate(Base):
    __tablename__ = "replicate_estimates"
    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(ForeignKey("simulation_runs.id"), index=True)
    replicate: Mapped[int] = mapped_column(Integer)
    method: Mapped[str] = mapped_column(String(16))  # latent | augbin | binary
    estimate: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    se: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    ci_low: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    ci_high: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    p_value: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    p_treat: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    p_control: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    converged: Mapped[bool] = mapped_column(default=False)
    error: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    run = relationship("SimulationRun", back_populates="replicates")
