import json
import os

from exceptions import ConfigError
from scenario import Scenario

def save_scenario(scenario: Scenario, path: str) -> None:
    with open(path, 'w') as data_file:
        json.dump(scenario.to_dict(), data_file, indent = 2, sort_keys = True)

def load_scenario(path: str) -> Scenario:
    if not os.path.isfile(path):
        raise FileNotFoundError(path)

    with open(path) as data_file:
        try:
            data = json.load(data_file)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: {err}") from None

    if not isinstance(data, dict):
        raise ConfigError(f"{path}: a scenario file holds one JSON object")
    return Scenario.from_dict(data)
