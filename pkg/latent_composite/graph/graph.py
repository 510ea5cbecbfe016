# latent_composite/graph/graph.py
import logging

from langgraph.graph import END, StateGraph

from latent_composite.comparators import AugmentedBinaryMethod, LatentMethod, StandardBinaryMethod
from latent_composite.config import AnalysisConfig
from latent_composite.core.records import Dataset
from latent_composite.gof import modified_pearson_residuals
from latent_composite.graph.state import AnalysisState

logger = logging.getLogger(__name__)


# ---------------------------
# Utilities
# ---------------------------
def add_trace(state: AnalysisState, node: str, detail: dict):
    state.setdefault("trace", [])
    state["trace"].append({"node": node, "detail": detail})


def _wanted(state: AnalysisState, method: str) -> bool:
    return method in (state.get("methods") or [])


def _record_failure(state: AnalysisState, method: str, e: Exception) -> None:
    text = f"{type(e).__name__}: {e}"
    state.setdefault("errors", {})
    state["errors"][method] = text
    logger.warning("%s analysis failed: %s", method, text)
    add_trace(state, f"{method}_failed", {"error": text})


def _record_effects(state: AnalysisState, method: str, effects: dict) -> None:
    state.setdefault("results", {})
    state["results"][method] = effects
    odds = effects.get("odds-ratio")
    add_trace(
        state,
        f"{method}_done",
        {
            "log_or": odds.estimate if odds else None,
            "se": odds.se if odds else None,
            "converged": all(e.converged for e in effects.values()),
        },
    )


# ---------------------------
# Method Nodes
# ---------------------------
def node_latent(state: AnalysisState) -> AnalysisState:
    state["latent_fit"] = None
    if not _wanted(state, "latent"):
        add_trace(state, "latent_skip", {"reason": "not requested"})
        return state
    cfg = state["config"]
    try:
        run = LatentMethod(cfg.fit_options(), cfg.qmc(), cfg.alpha, cfg.jacobian_qmc()).run(
            state["data"], state["rule"]
        )
    except Exception as e:
        _record_failure(state, "latent", e)
        return state
    state["latent_fit"] = run.fit
    add_trace(
        state,
        "latent_fit",
        {"loglik": run.fit.loglik, "converged": run.fit.converged, "n_iter": run.fit.n_iter},
    )
    _record_effects(state, "latent", run.effects)
    return state


def node_augbin(state: AnalysisState) -> AnalysisState:
    if not _wanted(state, "augbin"):
        add_trace(state, "augbin_skip", {"reason": "not requested"})
        return state
    cfg = state["config"]
    method = AugmentedBinaryMethod(
        cfg.augbin_retain, cfg.augbin_condition_on_retained, cfg.alpha, cfg.min_patients
    )
    try:
        _record_effects(state, "augbin", method.analyze_all(state["data"], state["rule"]))
    except Exception as e:
        _record_failure(state, "augbin", e)
    return state


def node_binary(state: AnalysisState) -> AnalysisState:
    if not _wanted(state, "binary"):
        add_trace(state, "binary_skip", {"reason": "not requested"})
        return state
    cfg = state["config"]
    try:
        effects = StandardBinaryMethod(cfg.alpha, cfg.min_patients).analyze_all(state["data"], state["rule"])
        _record_effects(state, "binary", effects)
    except Exception as e:
        _record_failure(state, "binary", e)
    return state


def node_gof(state: AnalysisState) -> AnalysisState:
    cfg = state["config"]
    try:
        res = modified_pearson_residuals(state["latent_fit"], state["data"], max_nodes=cfg.gof_max_nodes)
    except Exception as e:
        state["gof"] = None
        _record_failure(state, "gof", e)
        return state
    state["gof"] = res
    add_trace(
        state,
        "gof_done",
        {"mean_statistic": res.mean_statistic, "n_exceed": res.n_exceed, "repaired": res.repaired},
    )
    return state


def node_route(state: AnalysisState) -> str:
    return "gof" if state.get("latent_fit") is not None else "end"


def build_graph():
    g = StateGraph(AnalysisState)

    g.add_node("latent", node_latent)
    g.add_node("augbin", node_augbin)
    g.add_node("binary", node_binary)
    g.add_node("gof", node_gof)

    g.set_entry_point("latent")
    g.add_edge("latent", "augbin")
    g.add_edge("augbin", "binary")
    g.add_conditional_edges("binary", node_route, {"gof": "gof", "end": END})
    g.add_edge("gof", END)

    return g.compile()


def run_analysis(data: Dataset, config: AnalysisConfig, methods: list[str]) -> AnalysisState:
    """Run the requested methods (and the latent-model diagnostics) over one dataset."""
    state: AnalysisState = {
        "data": data,
        "rule": config.rule(),
        "config": config,
        "methods": list(methods),
        "results": {},
        "errors": {},
        "gof": None,
        "trace": [],
    }
    return build_graph().invoke(state)
