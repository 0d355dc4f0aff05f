import json

import pytest
from faker import Faker
from pydantic import ValidationError

from app.crud.config_repository import ConfigRepository
from app.crud.memo_repository import MemoRepository
from app.exceptions import ConfigError

fake = Faker()

class TestMemoRepository:

    def test_get_or_compute_caches(self):
        """
        The second lookup of a key is a hit and does not recompute.
        """
        repository = MemoRepository(fake.word())
        calls = []
        key = (fake.random_int(0, 9), fake.word())

        def compute():
            calls.append(key)
            return len(calls)

        assert repository.get_or_compute(key, compute) == 1
        assert repository.get_or_compute(key, compute) == 1
        assert calls == [key]
        assert repository.hits == 1 and repository.misses == 1
        assert key in repository and len(repository) == 1

    def test_recursive_lookups_do_not_deadlock(self):
        repository = MemoRepository("fib")

        def fib(n: int) -> int:
            if n < 2:
                return n
            return repository.get_or_compute(n, lambda: fib(n - 1) + fib(n - 2))

        assert fib(30) == 832040

    def test_clear(self):
        repository = MemoRepository(fake.word())
        repository.put("a", 1)
        repository.clear()
        assert repository.get("a") is None
        assert len(repository) == 0
        assert repository.hits == 0

class TestConfigRepository:

    def test_load_running_example(self, config_path):
        config = ConfigRepository(config_path).load()
        assert config.quiver.vertices == ["1", "2"]
        assert config.extension.t == [3, 1]

    def test_dumped_config_reloads(self, config_path, write_config):
        config = ConfigRepository(config_path).load()
        copy = write_config(config.model_dump(exclude_none=True), name="copy.json")
        assert ConfigRepository(copy).load() == config

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ConfigRepository(tmp_path / f"{fake.word()}.json").load()

    def test_no_path(self):
        with pytest.raises(ConfigError):
            ConfigRepository().load()

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            ConfigRepository(path).load()

    def test_schema_violation_is_a_validation_error(self, write_config):
        path = write_config({"quiver": {"vertices": ["1"]}})
        with pytest.raises(ValidationError):
            ConfigRepository(path).load()

    def test_invalid_quiver_is_a_config_error(self, write_config):
        path = write_config({
            "quiver": {"vertices": ["1", "2"], "arrows": [{"name": "m", "source": "1", "target": "3"}]},
            "extension": {"t": [1, 0]},
        })
        with pytest.raises(ConfigError):
            ConfigRepository(path).load()

    def test_extension_vertex_name_is_a_config_error(self, write_config):
        path = write_config({
            "quiver": {"vertices": ["inf", "2"], "arrows": [{"name": "m", "source": "inf", "target": "2"}]},
            "extension": {"t": [1, 0]},
        })
        with pytest.raises(ConfigError):
            ConfigRepository(path).load()

    def test_load_table(self, tmp_path):
        path = tmp_path / "table.json"
        path.write_text(json.dumps({"1:0,0": "1", "1:1,0": "L^3 - 1"}), encoding="utf-8")
        assert ConfigRepository().load_table(path) == {"1:0,0": "1", "1:1,0": "L^3 - 1"}

    def test_load_table_rejects_non_strings(self, tmp_path):
        path = tmp_path / "table.json"
        path.write_text(json.dumps({"1:0,0": 1}), encoding="utf-8")
        with pytest.raises(ConfigError):
            ConfigRepository().load_table(path)
