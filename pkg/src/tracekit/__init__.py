"""Toolkit for requirements-traceability link prediction experiments.

Pipeline pieces: dataset loading and splitting (`corpus`), vector
representations (`embeddings`), demonstration selection (`selection`),
prompt rendering (`prompting`), chat-model access with offline test
doubles (`llm_client`), IR baselines (`baselines`), metrics and
nonparametric tests (`metrics`, `stats`), and experiment orchestration
(`experiment`). The `tracekit` CLI ties them together.
"""

__version__ = "0.1.0"
