"""Trilinear sampling and deformable filtering."""

from .trilinear import (
    SamplePoint3,
    sample_trilinear,
    sample_trilinear_backward,
    sample_trilinear_many,
    sample_trilinear_many_backward,
)
from .deform import (
    RigidGrid,
    deform_sample,
    filter2d_deformable,
    filter2d_per_frame,
    filter3d_deformable,
    filter_group,
    group_bounds,
    group_outputs,
    per_frame_grid,
    rigid_grid,
    sampling_coordinates,
    tap_sum,
)

__all__ = [
    'SamplePoint3',
    'sample_trilinear',
    'sample_trilinear_backward',
    'sample_trilinear_many',
    'sample_trilinear_many_backward',
    'RigidGrid',
    'deform_sample',
    'filter2d_deformable',
    'filter2d_per_frame',
    'filter3d_deformable',
    'filter_group',
    'group_bounds',
    'group_outputs',
    'per_frame_grid',
    'rigid_grid',
    'sampling_coordinates',
    'tap_sum',
]
