# Copyright 2026 The bayesseg Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Bayesian segmentation with MC-dropout uncertainty and curriculum resampling."""

from ._bayesseg import (
    FormatError,
    MissingFileError,
    Model,
    argmax_labels,
    build_grid,
    build_plan,
    corrupt_region,
    entropy_map,
    generate_dataset,
    kfold_split,
    load_pmap,
    load_umap,
    reliability,
    save_pmap,
    save_umap,
    step_size,
    threshold,
    tile_uncertainty,
    train_stage,
    uncertainty_map,
)

__all__ = [
    "FormatError",
    "MissingFileError",
    "Model",
    "argmax_labels",
    "build_grid",
    "build_plan",
    "corrupt_region",
    "entropy_map",
    "generate_dataset",
    "kfold_split",
    "load_pmap",
    "load_umap",
    "reliability",
    "save_pmap",
    "save_umap",
    "step_size",
    "threshold",
    "tile_uncertainty",
    "train_stage",
    "uncertainty_map",
]
