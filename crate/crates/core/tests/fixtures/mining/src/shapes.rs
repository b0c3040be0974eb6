pub struct Rect {
    w: u32,
    h: u32,
}

impl Rect {
    pub fn new(w: u32, h: u32) -> Self {
        Rect { w, h }
    }

    pub fn area(&self) -> u32 {
        self.w * self.h
    }
}
