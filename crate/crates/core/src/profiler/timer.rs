use std::sync::OnceLock;
use std::time::{Duration, Instant};

/// Raw timer reading.
pub type Ticks = u64;

/// Where a [`Timer`] reads its ticks from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerSource {
    /// The runtime's monotonic clock, one tick per nanosecond.
    Monotonic,
    /// The x86-64 timestamp counter, calibrated against the monotonic clock.
    CycleCounter,
}

/// Monotonic high-resolution tick source with a known tick rate.
#[derive(Debug, Clone, Copy)]
pub struct Timer {
    source: TimerSource,
    ticks_per_second: f64,
    epoch: Instant,
}

impl Timer {
    pub fn monotonic() -> Self {
        Self {
            source: TimerSource::Monotonic,
            ticks_per_second: 1e9,
            epoch: Instant::now(),
        }
    }

    /// Timestamp-counter timer, calibrated over `window` of wall-clock time.
    /// `None` where no counter is available.
    pub fn cycle_counter(window: Duration) -> Option<Self> {
        #[cfg(target_arch = "x86_64")]
        {
            let wall = Instant::now();
            let c0 = read_tsc();
            while wall.elapsed() < window {
                std::hint::spin_loop();
            }
            let c1 = read_tsc();
            let secs = wall.elapsed().as_secs_f64();
            let rate = c1.checked_sub(c0)? as f64 / secs;
            (rate > 1e6).then_some(Self {
                source: TimerSource::CycleCounter,
                ticks_per_second: rate,
                epoch: wall,
            })
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            let _ = window;
            None
        }
    }

    pub fn source(&self) -> TimerSource {
        self.source
    }

    pub fn ticks_per_second(&self) -> f64 {
        self.ticks_per_second
    }

    #[inline]
    pub fn now(&self) -> Ticks {
        match self.source {
            TimerSource::Monotonic => self.epoch.elapsed().as_nanos() as Ticks,
            TimerSource::CycleCounter => read_tsc(),
        }
    }

    pub fn seconds(&self, ticks: Ticks) -> f64 {
        ticks as f64 / self.ticks_per_second
    }

    pub fn millis(&self, ticks: Ticks) -> f64 {
        self.seconds(ticks) * 1e3
    }
}

impl Default for Timer {
    fn default() -> Self {
        Self::monotonic()
    }
}

#[cfg(target_arch = "x86_64")]
#[inline]
fn read_tsc() -> Ticks {
    // SAFETY: rdtsc is available on every x86-64 CPU.
    unsafe { std::arch::x86_64::_rdtsc() }
}

#[cfg(not(target_arch = "x86_64"))]
#[inline]
fn read_tsc() -> Ticks {
    unreachable!("no cycle counter on this architecture")
}

/// Process-wide monotonic timer, initialized on first use.
pub fn global_timer() -> &'static Timer {
    static TIMER: OnceLock<Timer> = OnceLock::new();
    TIMER.get_or_init(Timer::monotonic)
}

/// Current reading of [`global_timer`].
#[inline]
pub fn now() -> Ticks {
    global_timer().now()
}
