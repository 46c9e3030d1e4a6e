use std::collections::{HashMap, HashSet};

use super::color::{Rgb, Rgba};
use crate::image_store::Plane;

pub const FALLBACK_GREY: Rgb = [128, 128, 128];

/// Colours for cell-type outlines.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPalette {
    pub types: HashMap<String, Rgb>,
    pub fallback: Rgb,
}

impl Default for CellPalette {
    fn default() -> Self {
        Self {
            types: HashMap::new(),
            fallback: FALLBACK_GREY,
        }
    }
}

impl CellPalette {
    pub fn color_for(&self, cell_type: Option<&str>) -> Rgb {
        cell_type
            .and_then(|t| self.types.get(t))
            .copied()
            .unwrap_or(self.fallback)
    }
}

/// True when pixel `(x, y)` belongs to a cell and one of its in-plane
/// 4-neighbours carries a different label (another cell or background).
pub fn is_boundary(mask: &Plane<u32>, x: usize, y: usize) -> bool {
    let id = mask.get(x, y);
    if id == 0 {
        return false;
    }
    let (w, h) = mask.dims();
    (x > 0 && mask.get(x - 1, y) != id)
        || (x + 1 < w && mask.get(x + 1, y) != id)
        || (y > 0 && mask.get(x, y - 1) != id)
        || (y + 1 < h && mask.get(x, y + 1) != id)
}

/// Transparent overlay with cell outlines drawn in their type colour.
/// When `only` is given, cells outside it are left undrawn (brush highlight).
pub fn render_cell_boundaries(
    mask: &Plane<u32>,
    cell_types: &HashMap<u32, String>,
    palette: &CellPalette,
    only: Option<&HashSet<u32>>,
) -> Plane<Rgba> {
    let (w, h) = mask.dims();
    let mut out = Plane::<Rgba>::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if !is_boundary(mask, x, y) {
                continue;
            }
            let id = mask.get(x, y);
            if only.is_some_and(|set| !set.contains(&id)) {
                continue;
            }
            let [r, g, b] = palette.color_for(cell_types.get(&id).map(String::as_str));
            out.set(x, y, [r, g, b, 255]);
        }
    }
    out
}
