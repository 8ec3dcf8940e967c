use crate::perception::SegMask;
use crate::world::Observation;

/// Warps the labels of an annotated view into `current` by matching world
/// hit points: a current ray inherits the label of the annotated ray that hit
/// the same wall face within half a cell. Unmatched rays, and rays whose wall
/// lies beyond sensor range, get the extra "no label" channel `classes`.
pub fn propagate_mask(annotated: Option<&Observation>, current: &Observation, classes: usize) -> SegMask {
    let none = classes;
    let Some(src) = annotated else {
        return SegMask::from_labels(&vec![none; current.rays()], classes + 1);
    };
    let labels: Vec<usize> = current
        .hits
        .iter()
        .map(|h| {
            if h.truncated {
                return none;
            }
            let mut best: Option<(f64, usize)> = None;
            for (j, s) in src.hits.iter().enumerate() {
                if s.truncated || s.cell != h.cell || s.face != h.face {
                    continue;
                }
                let d = (s.point.0 - h.point.0).hypot(s.point.1 - h.point.1);
                if d <= 0.5 && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            best.map_or(none, |(_, j)| src.gt_mask[j])
        })
        .collect();
    SegMask::from_labels(&labels, classes + 1)
}
