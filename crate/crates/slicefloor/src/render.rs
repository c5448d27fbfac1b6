//! SVG rendering of placed floorplans: one light-blue rectangle per module
//! with its `P_<id>` label at the lower-left corner, y axis flipped at
//! emission so plans read bottom-up while SVG draws top-down.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{ModuleDef, Placement};

/// Visual knobs. Defaults follow the reference figures: light-blue fills,
/// dark outlines, labels inside each rectangle's lower-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    /// Plan units to pixels; must be positive and finite.
    pub scale: f64,
    pub fill: String,
    pub stroke: String,
    pub stroke_width: f64,
    pub label_font_size: f64,
}

impl Default for RenderStyle {
    fn default() -> RenderStyle {
        RenderStyle {
            scale: 1.0,
            fill: "#ADD8E6".to_owned(),
            stroke: "#1F3A5F".to_owned(),
            stroke_width: 1.0,
            label_font_size: 12.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("placement covers {placed} modules but {given} definitions were supplied")]
    ModuleCountMismatch { placed: usize, given: usize },
    #[error("placed module P_{id} has no definition in the module set")]
    UnknownModule { id: u32 },
    #[error("module P_{id} extends beyond the placement envelope")]
    OutsideEnvelope { id: u32 },
    #[error("scale must be positive and finite, got {scale}")]
    InvalidScale { scale: f64 },
}

/// Renders a placement as standalone SVG 1.1 text: exactly one `<rect>` and
/// one `<text>` per module, a viewBox equal to the scaled envelope, and no
/// other painted elements. Output bytes are a pure function of the inputs.
pub fn render_svg(
    placement: &Placement,
    modules: &[ModuleDef],
    style: &RenderStyle,
) -> Result<String, RenderError> {
    if !(style.scale.is_finite() && style.scale > 0.0) {
        return Err(RenderError::InvalidScale { scale: style.scale });
    }
    if placement.entries.len() != modules.len() {
        return Err(RenderError::ModuleCountMismatch {
            placed: placement.entries.len(),
            given: modules.len(),
        });
    }
    let by_id: HashMap<u32, &ModuleDef> = modules.iter().map(|m| (m.id, m)).collect();

    let scale = style.scale;
    let view_w = placement.envelope.width as f64 * scale;
    let view_h = placement.envelope.height as f64 * scale;
    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {view_w} {view_h}\" \
         width=\"{view_w}\" height=\"{view_h}\">"
    )
    .expect("string writes are infallible");

    let inset = style.label_font_size * 0.25;
    for placed in &placement.entries {
        let def = by_id
            .get(&placed.id)
            .ok_or(RenderError::UnknownModule { id: placed.id })?;
        let top = placed
            .y
            .checked_add(def.height)
            .filter(|&t| t <= placement.envelope.height)
            .ok_or(RenderError::OutsideEnvelope { id: placed.id })?;
        if placed
            .x
            .checked_add(def.width)
            .map_or(true, |r| r > placement.envelope.width)
        {
            return Err(RenderError::OutsideEnvelope { id: placed.id });
        }
        // Plans anchor modules at their lower-left; SVG y grows downward,
        // so a module's screen top is the envelope height minus its top.
        let x = placed.x as f64 * scale;
        let y = (placement.envelope.height - top) as f64 * scale;
        let w = def.width as f64 * scale;
        let h = def.height as f64 * scale;
        writeln!(
            svg,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" fill=\"{}\" \
             stroke=\"{}\" stroke-width=\"{}\"/>",
            style.fill, style.stroke, style.stroke_width
        )
        .expect("string writes are infallible");
        let label_x = x + inset;
        let label_y = (placement.envelope.height - placed.y) as f64 * scale - inset;
        writeln!(
            svg,
            "<text x=\"{label_x}\" y=\"{label_y}\" font-family=\"sans-serif\" \
             font-size=\"{}\" fill=\"#000000\">P_{}</text>",
            style.label_font_size, placed.id
        )
        .expect("string writes are infallible");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_instance, GenConfig};
    use crate::geometry::{evaluate, place};

    fn module(id: u32, width: u64, height: u64) -> ModuleDef {
        ModuleDef::new(id, width, height).unwrap()
    }

    /// Pulls every rect's (x, y, width, height) back out of the SVG text.
    fn parse_rects(svg: &str) -> Vec<(f64, f64, f64, f64)> {
        svg.lines()
            .filter(|line| line.starts_with("<rect "))
            .map(|line| {
                let attr = |name: &str| -> f64 {
                    let key = format!("{name}=\"");
                    let start = line.find(&key).expect("attribute present") + key.len();
                    let end = start + line[start..].find('"').expect("closing quote");
                    line[start..end].parse().expect("numeric attribute")
                };
                (attr("x"), attr("y"), attr("width"), attr("height"))
            })
            .collect()
    }

    fn count_tags(svg: &str, tag: &str) -> usize {
        svg.matches(&format!("<{tag} ")).count()
    }

    fn overlaps(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> bool {
        a.0 < b.0 + b.2 && b.0 < a.0 + a.2 && a.1 < b.1 + b.3 && b.1 < a.1 + a.3
    }

    #[test]
    fn lone_module_renders_one_rect_at_origin() {
        let modules = vec![module(7, 2, 3)];
        let placement = place(&crate::geometry::SlicingTree::Leaf(0), &modules).unwrap();
        let svg = render_svg(&placement, &modules, &RenderStyle::default()).unwrap();
        assert!(svg.contains("viewBox=\"0 0 2 3\""));
        assert_eq!(parse_rects(&svg), vec![(0.0, 0.0, 2.0, 3.0)]);
        assert_eq!(count_tags(&svg, "rect"), 1);
        assert_eq!(count_tags(&svg, "text"), 1);
        assert!(svg.contains(">P_7</text>"));
    }

    #[test]
    fn worked_example_tiles_its_envelope_without_gaps() {
        let modules = vec![
            module(5, 5412, 522),
            module(83, 3442, 1961),
            module(87, 1970, 1961),
        ];
        let expr = "P_83;P_87;V;P_5;H";
        let tree = crate::encoding::expression_to_tree(expr, &modules).unwrap();
        let placement = place(&tree, &modules).unwrap();
        let svg = render_svg(&placement, &modules, &RenderStyle::default()).unwrap();

        assert!(svg.contains("viewBox=\"0 0 5412 2483\""));
        let rects = parse_rects(&svg);
        assert_eq!(rects.len(), 3);
        for (i, a) in rects.iter().enumerate() {
            for b in &rects[i + 1..] {
                assert!(!overlaps(*a, *b), "rects {a:?} and {b:?} overlap");
            }
            assert!(a.0 >= 0.0 && a.1 >= 0.0);
            assert!(a.0 + a.2 <= 5412.0 && a.1 + a.3 <= 2483.0);
        }
        let area: f64 = rects.iter().map(|r| r.2 * r.3).sum();
        assert_eq!(area, 5412.0 * 2483.0);
        for label in ["P_5", "P_83", "P_87"] {
            assert!(svg.contains(&format!(">{label}</text>")));
        }
    }

    #[test]
    fn y_axis_flips_at_emission() {
        // The worked example stacks P_5 on top of the P_83/P_87 row, so on
        // screen P_5 must sit at y = 0 and the row below it.
        let modules = vec![
            module(5, 5412, 522),
            module(83, 3442, 1961),
            module(87, 1970, 1961),
        ];
        let tree = crate::encoding::expression_to_tree("P_83;P_87;V;P_5;H", &modules).unwrap();
        let placement = place(&tree, &modules).unwrap();
        let svg = render_svg(&placement, &modules, &RenderStyle::default()).unwrap();
        // Entries are sorted by id, so the first rect belongs to P_5.
        let rects = parse_rects(&svg);
        assert_eq!(rects[0], (0.0, 0.0, 5412.0, 522.0));
        assert_eq!(rects[1], (0.0, 522.0, 3442.0, 1961.0));
        assert_eq!(rects[2], (3442.0, 522.0, 1970.0, 1961.0));
    }

    #[test]
    fn scale_multiplies_every_coordinate() {
        let modules = vec![module(0, 4, 2), module(1, 4, 6)];
        let tree = crate::encoding::expression_to_tree("P_0;P_1;H", &modules).unwrap();
        let placement = place(&tree, &modules).unwrap();
        let style = RenderStyle {
            scale: 0.5,
            ..RenderStyle::default()
        };
        let svg = render_svg(&placement, &modules, &style).unwrap();
        assert!(svg.contains("viewBox=\"0 0 2 4\""));
        let rects = parse_rects(&svg);
        // P_0 sits below P_1 in the plan, so above it on screen.
        assert_eq!(rects[0], (0.0, 3.0, 2.0, 1.0));
        assert_eq!(rects[1], (0.0, 0.0, 2.0, 3.0));
    }

    #[test]
    fn generated_floorplans_render_with_exact_geometry() {
        for n in [1usize, 2, 5, 9, 12] {
            let cfg = GenConfig::new(n, 0x5EED ^ n as u64);
            let instance = generate_instance(&cfg).unwrap();
            let placement = place(&instance.optimal_tree, &instance.modules).unwrap();
            let svg = render_svg(&placement, &instance.modules, &RenderStyle::default()).unwrap();
            let rects = parse_rects(&svg);
            assert_eq!(rects.len(), n);
            assert_eq!(count_tags(&svg, "text"), n);
            let eval = evaluate(&instance.optimal_tree, &instance.modules).unwrap();
            assert_eq!(eval.total_dead_space, 0);
            // Zero dead space + no overlaps + in-bounds ⇒ gapless tiling.
            let area: f64 = rects.iter().map(|r| r.2 * r.3).sum();
            assert_eq!(
                area,
                placement.envelope.width as f64 * placement.envelope.height as f64
            );
            for (i, a) in rects.iter().enumerate() {
                for b in &rects[i + 1..] {
                    assert!(!overlaps(*a, *b));
                }
            }
        }
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        let modules = vec![module(0, 3, 3), module(1, 5, 3)];
        let tree = crate::encoding::expression_to_tree("P_0;P_1;V", &modules).unwrap();
        let placement = place(&tree, &modules).unwrap();
        let a = render_svg(&placement, &modules, &RenderStyle::default()).unwrap();
        let b = render_svg(&placement, &modules, &RenderStyle::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let modules = vec![module(0, 2, 2), module(1, 2, 2)];
        let tree = crate::encoding::expression_to_tree("P_0;P_1;V", &modules).unwrap();
        let placement = place(&tree, &modules).unwrap();

        let short = &modules[..1];
        assert_eq!(
            render_svg(&placement, short, &RenderStyle::default()),
            Err(RenderError::ModuleCountMismatch {
                placed: 2,
                given: 1
            })
        );

        let renamed = vec![module(0, 2, 2), module(9, 2, 2)];
        assert_eq!(
            render_svg(&placement, &renamed, &RenderStyle::default()),
            Err(RenderError::UnknownModule { id: 1 })
        );

        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            let style = RenderStyle {
                scale: bad,
                ..RenderStyle::default()
            };
            assert!(matches!(
                render_svg(&placement, &modules, &style),
                Err(RenderError::InvalidScale { .. })
            ));
        }
    }

    #[test]
    fn out_of_envelope_placement_is_rejected() {
        let modules = vec![module(0, 2, 2)];
        let tree = crate::geometry::SlicingTree::Leaf(0);
        let mut placement = place(&tree, &modules).unwrap();
        placement.entries[0].x = 1;
        assert_eq!(
            render_svg(&placement, &modules, &RenderStyle::default()),
            Err(RenderError::OutsideEnvelope { id: 0 })
        );
    }
}
