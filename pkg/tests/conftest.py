import random

import pytest

from pipetune.pipeline import Action, DataflowGraph, PipelineModel


@pytest.fixture
def small_pipe():
    return PipelineModel(stages=4, sram_words_per_stage=64,
                         hash_units_per_stage=6, alu_slots_per_stage=8)


def random_dfg(seed: int, max_actions: int = 10) -> DataflowGraph:
    """Seeded random DAG with arrays, hash units, and ALU demand.

    Dependencies only point at earlier actions, so the graph is acyclic by
    construction. Sized so that a useful fraction fits a small pipeline.
    """
    rng = random.Random(seed)
    n = rng.randint(1, max_actions)
    actions = []
    for i in range(n):
        deps = frozenset(f"a{j}" for j in range(i) if rng.random() < 0.25)
        array = None
        if rng.random() < 0.7:
            array = (f"arr{i}", rng.choice([4, 8, 16, 32, 64]))
        actions.append(Action(f"a{i}", deps, array,
                              hash_units=rng.randint(0, 2),
                              alu_slots=rng.randint(0, 3)))
    return DataflowGraph.of(actions)
