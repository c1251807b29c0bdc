//! Simulator semantic class ids (CARLA 0.9.14+ tag numbering).

pub const CLASS_COUNT: usize = 29;

/// `(id, name)` for every class in the taxonomy.
pub const CLASSES: [(u8, &str); CLASS_COUNT] = [
    (0, "unlabeled"),
    (1, "road"),
    (2, "sidewalk"),
    (3, "building"),
    (4, "wall"),
    (5, "fence"),
    (6, "pole"),
    (7, "traffic light"),
    (8, "traffic sign"),
    (9, "vegetation"),
    (10, "terrain"),
    (11, "sky"),
    (12, "pedestrian"),
    (13, "rider"),
    (14, "car"),
    (15, "truck"),
    (16, "bus"),
    (17, "train"),
    (18, "motorcycle"),
    (19, "bicycle"),
    (20, "static"),
    (21, "dynamic"),
    (22, "other"),
    (23, "water"),
    (24, "road line"),
    (25, "ground"),
    (26, "bridge"),
    (27, "rail track"),
    (28, "guard rail"),
];

pub fn class_id(name: &str) -> Option<u8> {
    CLASSES.iter().find(|(_, n)| *n == name).map(|(id, _)| *id)
}

pub fn class_name(id: u8) -> Option<&'static str> {
    CLASSES.get(usize::from(id)).map(|(_, n)| *n)
}
