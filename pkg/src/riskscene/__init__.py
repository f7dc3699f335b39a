"""riskscene: heterogeneous trajectory forecasting over collision-risk and
road-scene graphs, with a self-contained training core."""

__version__ = "0.1.0"
