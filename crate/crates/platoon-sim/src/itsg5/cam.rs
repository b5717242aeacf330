//! Cooperative awareness message: field canonicalization and wire codec.
//!
//! Field semantics follow the standard value ranges (deci-degree compass
//! heading, cm/s speed, millisecond generation time modulo 2^16), carried in
//! a fixed 18-byte big-endian frame:
//!
//! | bytes    | field                 | type |
//! |----------|-----------------------|------|
//! | `[0..4)`  | station_id            | u32  |
//! | `[4..6)`  | generation_delta_time | u16  |
//! | `[6..10)` | x_cm                  | i32  |
//! | `[10..14)`| y_cm                  | i32  |
//! | `[14..16)`| heading_value         | u16  |
//! | `[16..18)`| speed_value           | u16  |

use thiserror::Error;

use crate::dynamics::OdometrySample;
use crate::time::SimTime;

/// Wire frame length in bytes.
pub const FRAME_LEN: usize = 18;

/// Heading values are deci-degrees in `[0, 3600)`.
pub const HEADING_LIMIT: u16 = 3600;

/// Decoded cooperative awareness message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cam {
    pub station_id: u32,
    /// Milliseconds since start, modulo 2^16.
    pub generation_delta_time: u16,
    /// Position in the local planar frame, centimeters.
    pub x_cm: i32,
    pub y_cm: i32,
    /// Compass heading in deci-degrees: 0 = +y axis, growing clockwise.
    pub heading_value: u16,
    /// Speed in cm/s.
    pub speed_value: u16,
}

/// Encoded 18-byte frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodedFrame([u8; FRAME_LEN]);

impl EncodedFrame {
    pub fn as_bytes(&self) -> &[u8; FRAME_LEN] {
        &self.0
    }
}

impl AsRef<[u8]> for EncodedFrame {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("frame length {0}, expected {FRAME_LEN}")]
    WrongLength(usize),
    #[error("heading value {0} out of range (must be < {HEADING_LIMIT})")]
    HeadingOutOfRange(u16),
}

/// Builds a CAM from an odometry sample: the vehicle-data-provider step that
/// quantizes plant units into message units.
///
/// Values outside the field ranges saturate at the field bounds.
pub fn vdp_sample(odom: &OdometrySample, station_id: u32, now: SimTime) -> Cam {
    // Internal heading is radians CCW from +x; the message wants compass
    // deci-degrees (0 = +y, clockwise).
    let compass_deg = (90.0 - odom.heading.to_degrees()).rem_euclid(360.0);
    Cam {
        station_id,
        generation_delta_time: (now.as_millis() % 65_536) as u16,
        x_cm: (odom.x * 100.0).round() as i32,
        y_cm: (odom.y * 100.0).round() as i32,
        heading_value: ((compass_deg * 10.0).round() as u32 % 3600) as u16,
        speed_value: (odom.speed * 100.0).round() as u16,
    }
}

/// Encodes a CAM into the fixed wire layout. Injective over valid CAMs.
pub fn cam_encode(cam: &Cam) -> Result<EncodedFrame, CodecError> {
    if cam.heading_value >= HEADING_LIMIT {
        return Err(CodecError::HeadingOutOfRange(cam.heading_value));
    }
    let mut b = [0u8; FRAME_LEN];
    b[0..4].copy_from_slice(&cam.station_id.to_be_bytes());
    b[4..6].copy_from_slice(&cam.generation_delta_time.to_be_bytes());
    b[6..10].copy_from_slice(&cam.x_cm.to_be_bytes());
    b[10..14].copy_from_slice(&cam.y_cm.to_be_bytes());
    b[14..16].copy_from_slice(&cam.heading_value.to_be_bytes());
    b[16..18].copy_from_slice(&cam.speed_value.to_be_bytes());
    Ok(EncodedFrame(b))
}

/// Decodes a wire frame. Rejects wrong lengths and corrupt heading values.
pub fn cam_decode(bytes: &[u8]) -> Result<Cam, CodecError> {
    let b: &[u8; FRAME_LEN] = bytes
        .try_into()
        .map_err(|_| CodecError::WrongLength(bytes.len()))?;
    let cam = Cam {
        station_id: u32::from_be_bytes(b[0..4].try_into().unwrap()),
        generation_delta_time: u16::from_be_bytes(b[4..6].try_into().unwrap()),
        x_cm: i32::from_be_bytes(b[6..10].try_into().unwrap()),
        y_cm: i32::from_be_bytes(b[10..14].try_into().unwrap()),
        heading_value: u16::from_be_bytes(b[14..16].try_into().unwrap()),
        speed_value: u16::from_be_bytes(b[16..18].try_into().unwrap()),
    };
    if cam.heading_value >= HEADING_LIMIT {
        return Err(CodecError::HeadingOutOfRange(cam.heading_value));
    }
    Ok(cam)
}

#[cfg(test)]
pub(crate) fn random_valid_cam(rng: &mut impl rand::Rng) -> Cam {
    Cam {
        station_id: rng.random(),
        generation_delta_time: rng.random(),
        x_cm: rng.random(),
        y_cm: rng.random(),
        heading_value: rng.random_range(0..HEADING_LIMIT),
        speed_value: rng.random(),
    }
}
