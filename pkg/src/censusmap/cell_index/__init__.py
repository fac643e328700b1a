"""Cell-cover / radix-trie point assignment."""
from .cellid import (
    MAX_LEVEL,
    ROOT_ID,
    cell_children,
    cell_diagonal,
    cell_from_point,
    cell_id,
    cell_level,
    cell_parent,
    cell_rect,
    contains,
    ids_from_points,
)
from .cover import CellCover, CellEntry, Classification, build_cover, classify_cell, cover_polygons
from .io import load_index, save_index
from .query import index_stats, query
from .trie import TrieIndex, build_trie

__all__ = [
    "MAX_LEVEL", "ROOT_ID", "CellCover", "CellEntry", "Classification", "TrieIndex",
    "build_cover", "build_trie", "cell_children", "cell_diagonal", "cell_from_point", "cell_id",
    "cell_level", "cell_parent", "cell_rect", "classify_cell", "contains", "cover_polygons",
    "ids_from_points", "index_stats", "load_index", "query", "save_index",
]
