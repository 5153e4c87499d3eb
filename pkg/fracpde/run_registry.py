"""
Registro de ejecuciones con SQLAlchemy.

Cada `solve` añade una fila a la tabla 'runs' de la base SQLite `runs.sqlite`
del directorio raíz de salida, con sus artefactos asociados en la tabla
'artifacts'. El subcomando `history` consulta este registro.
"""

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Union

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, create_engine
from sqlalchemy.orm import Session, declarative_base, joinedload, relationship, sessionmaker

logger = logging.getLogger(__name__)

REGISTRY_FILE = "runs.sqlite"

Base = declarative_base()


class Run(Base):
    """Una ejecución de escenario"""

    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    config_hash = Column(String, nullable=False, index=True)
    scenario = Column(String, nullable=False)
    solver = Column(String, nullable=False)
    preset = Column(String)
    seed = Column(Integer, nullable=False)
    output_dir = Column(String, nullable=False)
    exit_code = Column(Integer, nullable=False)
    elapsed_seconds = Column(Float)
    versions = Column(String)
    created_at = Column(DateTime, default=lambda: datetime.now(timezone.utc))

    artifacts = relationship("Artifact", back_populates="run", cascade="all, delete-orphan")

    def to_dict(self) -> Dict:
        return {
            "id": self.id,
            "config_hash": self.config_hash,
            "scenario": self.scenario,
            "solver": self.solver,
            "preset": self.preset,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "exit_code": self.exit_code,
            "elapsed_seconds": self.elapsed_seconds,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "artifacts": len(self.artifacts),
        }


class Artifact(Base):
    """Fichero producido por una ejecución"""

    __tablename__ = "artifacts"

    id = Column(Integer, primary_key=True, autoincrement=True)
    kind = Column(String, nullable=False)
    path = Column(String, nullable=False)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False)

    run = relationship("Run", back_populates="artifacts")


def open_registry(location: Union[str, Path, None] = None) -> sessionmaker:
    """
    Abre (y crea si hace falta) el registro.

    Args:
        location: directorio raíz de salida; None usa una base en memoria

    Returns:
        sessionmaker: fábrica de sesiones ligada al motor
    """
    if location is None:
        url = "sqlite:///:memory:"
    else:
        root = Path(location)
        root.mkdir(parents=True, exist_ok=True)
        url = f"sqlite:///{root / REGISTRY_FILE}"
    engine = create_engine(url, echo=False)
    Base.metadata.create_all(engine)
    return sessionmaker(bind=engine)


def record_run(session: Session, *, config_hash: str, scenario: str, solver: str,
               preset: Optional[str], seed: int, output_dir: str, exit_code: int,
               elapsed_seconds: Optional[float] = None, versions: Optional[str] = None,
               artifacts: Optional[Dict[str, List[str]]] = None) -> Run:
    """Registra una ejecución con sus artefactos agrupados por tipo"""
    run = Run(config_hash=config_hash, scenario=scenario, solver=solver, preset=preset,
              seed=seed, output_dir=output_dir, exit_code=exit_code,
              elapsed_seconds=elapsed_seconds, versions=versions)
    for kind, paths in (artifacts or {}).items():
        for path in paths:
            run.artifacts.append(Artifact(kind=kind, path=str(path)))
    session.add(run)
    session.commit()
    logger.debug(f"Ejecución {run.id} registrada ({scenario}, código {exit_code})")
    return run


def list_runs(session: Session, limit: Optional[int] = None) -> List[Run]:
    """Ejecuciones de la más reciente a la más antigua"""
    query = session.query(Run).options(joinedload(Run.artifacts)).order_by(Run.id.desc())
    if limit is not None:
        query = query.limit(limit)
    return query.all()


def find_runs_by_hash(session: Session, config_hash: str) -> List[Run]:
    return session.query(Run).filter_by(config_hash=config_hash).order_by(Run.id).all()


def delete_run(session: Session, run_id: int) -> bool:
    run = session.get(Run, run_id)
    if run is None:
        return False
    session.delete(run)
    session.commit()
    return True
