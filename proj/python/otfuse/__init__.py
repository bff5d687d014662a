"""Python bindings for the optimal-transport fusion core."""

try:
    from . import _otfuse as _core
except ImportError:  # build-tree layout: extension next to the package
    import _otfuse as _core

CapacityError = _core.CapacityError
DomainError = _core.DomainError
ParamError = _core.ParamError
ShapeError = _core.ShapeError
barycentric_project = _core.barycentric_project
bce_loss = _core.bce_loss
build_cost_matrix = _core.build_cost_matrix
cosine_distance = _core.cosine_distance
depth_to_normal = _core.depth_to_normal
dice_loss = _core.dice_loss
exact_transport = _core.exact_transport
predict_mask = _core.predict_mask
segmentation_metrics = _core.segmentation_metrics
sinkhorn = _core.sinkhorn
softmax_with_temperature = _core.softmax_with_temperature
tensor_product_joint = _core.tensor_product_joint

__all__ = [
    "CapacityError",
    "DomainError",
    "ParamError",
    "ShapeError",
    "barycentric_project",
    "bce_loss",
    "build_cost_matrix",
    "cosine_distance",
    "depth_to_normal",
    "dice_loss",
    "exact_transport",
    "predict_mask",
    "segmentation_metrics",
    "sinkhorn",
    "softmax_with_temperature",
    "tensor_product_joint",
]
