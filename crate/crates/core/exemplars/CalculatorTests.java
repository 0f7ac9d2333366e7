package com.example.project;

import static org.junit.jupiter.api.Assertions.assertEquals;
import static org.junit.jupiter.api.Assertions.assertThrows;

import org.junit.jupiter.api.DisplayName;
import org.junit.jupiter.api.Test;
import org.junit.jupiter.params.ParameterizedTest;
import org.junit.jupiter.params.provider.CsvSource;

class CalculatorTests {

	private final Calculator calculator = new Calculator();

	@Test
	@DisplayName("1 + 1 = 2")
	void addsTwoNumbers() {
		assertEquals(2, calculator.add(1, 1), "1 + 1 should equal 2");
	}

	@ParameterizedTest(name = "{0} - {1} = {2}")
	@CsvSource({
			"0,    1,   -1",
			"1,    2,   -1",
			"49,  51,   -2",
			"1,  100,  -99"
	})
	void subtract(int first, int second, int expectedResult) {
		assertEquals(expectedResult, calculator.subtract(first, second),
				() -> first + " - " + second + " should equal " + expectedResult);
	}

	@Test
	void divisionByZeroIsRejected() {
		assertThrows(ArithmeticException.class, () -> calculator.divide(1, 0));
	}
}
