"""Synthetic generators, DAG fixtures and CSV input/output."""

from .csv_io import DatasetSidecar, load_csv, read_sidecar, sidecar_path, write_csv, write_sidecar
from .fixtures import fixture_names, load_fixture
from .synthetic import (
    HierarchicalSpec,
    LinearGaussianBn,
    LinearGaussianBnSpec,
    build_linear_gaussian_bn,
    gen_chain_timeseries,
    gen_hierarchical,
    gen_linear_gaussian_bn,
    generating_params,
    truth_dag,
    hierarchical_rows,
)

__all__ = [
    "DatasetSidecar",
    "load_csv",
    "read_sidecar",
    "sidecar_path",
    "write_csv",
    "write_sidecar",
    "fixture_names",
    "load_fixture",
    "HierarchicalSpec",
    "LinearGaussianBn",
    "LinearGaussianBnSpec",
    "build_linear_gaussian_bn",
    "gen_chain_timeseries",
    "gen_hierarchical",
    "gen_linear_gaussian_bn",
    "generating_params",
    "truth_dag",
    "hierarchical_rows",
]
