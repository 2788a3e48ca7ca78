"""Silhouette rasterizer with analytic edge gradients, and a multi-view fitting harness."""
from .backward import ScreenGradients, backward, detect_boundary_pixels, edge_pixel_partials, silhouette_edges
from .clip import Segment, clip_polygon_to_rect, liang_barsky_clip, polygon_area
from .forward import RenderSettings, SilhouetteImage, rasterize
from .geometry import Rect, ScreenMesh, TriangleMesh, load_obj, save_obj, signed_area
from .loss import MultiViewTargets, Objective, evaluate_objective, silhouette_loss
from .model import PoseModel, RigidModel, Skeleton, make_toy_body
from .optim import AdamState, Scene, adam_step, fit
from .oracle import exact_image, exact_pixel_coverage
from .projection import Camera, look_at, make_turntable_cameras, project

__version__ = "0.1.0"
