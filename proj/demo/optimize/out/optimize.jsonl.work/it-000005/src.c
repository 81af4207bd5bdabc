int main(void) {
  asm("nop");
  asm("nop");
  asm("nop");
  SYNTAX_ERROR
  return 0;
}