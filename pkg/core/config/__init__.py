# Config package
from .config_manager import ConfigManager, config_manager, initialize_config_manager, get_config_manager
from .scenario_loader import Scenario, load_scenario, scenario_from_dict

__all__ = ['ConfigManager', 'config_manager', 'initialize_config_manager', 'get_config_manager',
           'Scenario', 'load_scenario', 'scenario_from_dict']
