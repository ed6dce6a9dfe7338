//! The example contracts shipped with the library.

pub const LE_DEVICE: &str = include_str!("../fixtures/le_device.ia");
pub const TRANSPORT_LAYER: &str = include_str!("../fixtures/transport_layer.ia");
pub const PING: &str = include_str!("../fixtures/ping.ia");
pub const PONG: &str = include_str!("../fixtures/pong.ia");
/// Fails validation: one action in two alphabets.
pub const BROKEN: &str = include_str!("../fixtures/broken.ia");
