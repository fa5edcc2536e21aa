use crc::{Crc, CRC_16_IBM_3740};

// CRC-16/IBM-3740 is the catalogue name of CCITT-FALSE:
// poly 0x1021, init 0xFFFF, no reflection, xorout 0.
const CCITT_FALSE: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

pub fn crc16_ccitt_false(bytes: &[u8]) -> u16 {
    CCITT_FALSE.checksum(bytes)
}
