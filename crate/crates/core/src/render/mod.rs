//! Intensity-to-colour mapping, channel compositing, cell outlines and
//! focus+context lens rendering.

mod boundaries;
mod color;
mod lens;
mod scale;
mod view;

pub use boundaries::{is_boundary, render_cell_boundaries, CellPalette, FALLBACK_GREY};
pub use color::{
    blend, composite, map_intensity, to_rgba, ChannelRenderSetting, ChannelSet, Rgb, Rgba,
};
pub use lens::{
    lens_source_coord, source_radius, LensMode, LensState, Magnifier, DEFAULT_PLATEAU_FRACTION,
};
pub use scale::{lens_scale_ticks, nice_step, screen_to_microns, ScaleAxis, ScaleTick};
pub use view::{
    read_channel_planes, render_context, render_lens, render_view, split_screen, LensPatch,
};
