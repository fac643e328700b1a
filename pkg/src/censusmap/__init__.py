"""Map lon/lat points onto a state/county/block-group polygon hierarchy."""
from .errors import DataError, FormatError
from .geometry import BBox, MembershipMatrix, Point, PolygonGeometry, bbox_contains, bbox_membership, \
    points_in_polygon, polygon_bbox
from .hierarchy import RegionHierarchy, RegionNode, load_boundaries, load_hierarchy, save_hierarchy
from .result import AssignmentResult, pip_fraction
from .simple_mapper import assign
from .synthetic import generate_synthetic

__version__ = "0.1.0"
