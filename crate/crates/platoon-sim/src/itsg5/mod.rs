//! Simplified cooperative-awareness stack: CAM construction and codec, the
//! fixed-rate generation service, and the lossy broadcast channel with its
//! node mobility table.

pub mod cam;
pub mod channel;
pub mod service;

pub use cam::{cam_decode, cam_encode, vdp_sample, Cam, CodecError, EncodedFrame, FRAME_LEN};
pub use channel::{BroadcastChannel, ChannelConfig, ChannelStats, Delivery};
pub use service::{CaService, CaServiceConfig};
