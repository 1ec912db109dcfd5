from .commands import build_parser, main
from .config_manager import RunConfig, RunConfigManager, get_config_manager, init_config_manager, parse_config
from .files import atomic_write_text, format_float
from .history import HISTORY_COLUMNS, format_history_csv, write_history_csv
from .summary import FileCampaignWriter, load_campaign, summary_dict, write_summary_json
from .vtk_io import VtkFieldData, evaluation_fields, format_field_vtk, load_shape, read_field_vtk, write_field_vtk

__all__ = [
    "FileCampaignWriter",
    "HISTORY_COLUMNS",
    "RunConfig",
    "RunConfigManager",
    "VtkFieldData",
    "atomic_write_text",
    "build_parser",
    "evaluation_fields",
    "format_field_vtk",
    "format_float",
    "format_history_csv",
    "get_config_manager",
    "init_config_manager",
    "load_campaign",
    "load_shape",
    "main",
    "parse_config",
    "read_field_vtk",
    "summary_dict",
    "write_field_vtk",
    "write_history_csv",
    "write_summary_json",
]
