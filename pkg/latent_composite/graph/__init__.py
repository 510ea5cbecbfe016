from latent_composite.graph.graph import build_graph, run_analysis
from latent_composite.graph.state import AnalysisState

__all__ = ["AnalysisState", "build_graph", "run_analysis"]
