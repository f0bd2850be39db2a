namespace wavekin {
}
