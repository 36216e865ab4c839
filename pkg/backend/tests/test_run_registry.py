from concurrent.futures import ThreadPoolExecutor

from models import RunSummary
from run_registry import RunRegistry


def _summary(name="run"):
    return RunSummary(name=name, kind="penex")


class TestRunRegistry:

    def test_register_assigns_sequential_ids(self):
        registry = RunRegistry()
        first = registry.register(_summary("a"))
        second = registry.register(_summary("b"))
        assert (first.run_id, second.run_id) == ("run_1", "run_2")
        assert registry.get("run_2").name == "b"

    def test_register_does_not_mutate_input(self):
        summary = _summary()
        RunRegistry().register(summary)
        assert summary.run_id == ""

    def test_history_drops_oldest(self):
        registry = RunRegistry(max_history=2)
        for name in ("a", "b", "c"):
            registry.register(_summary(name))
        assert [s.name for s in registry.list_runs()] == ["b", "c"]
        assert registry.get("run_1") is None

    def test_remove(self):
        registry = RunRegistry()
        stored = registry.register(_summary())
        assert registry.remove(stored.run_id)
        assert not registry.remove(stored.run_id)
        assert registry.list_runs() == []

    def test_unknown_id(self):
        assert RunRegistry().get("run_404") is None

    def test_concurrent_registration_gives_unique_ids(self):
        registry = RunRegistry(max_history=100)
        with ThreadPoolExecutor(max_workers=8) as pool:
            stored = list(pool.map(lambda i: registry.register(_summary(str(i))), range(50)))
        assert len({s.run_id for s in stored}) == 50
